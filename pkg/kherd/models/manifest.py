from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional


@dataclass
class RunManifest:
    """What a command ran with and what it wrote. `error` is set when the run failed."""

    command: str
    config: Dict[str, Any]
    seed: int
    version: str
    artifacts: List[str] = field(default_factory=list)
    duration: float = 0.0
    error: Optional[str] = None
    results: Dict[str, Any] = field(default_factory=dict)

    def add(self, *paths) -> None:
        for path in paths:
            self.artifacts.append(Path(path).name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config': self.config,
            'seed': self.seed,
            'artifacts': self.artifacts,
            'duration': self.duration,
            'version': self.version,
            'error': self.error,
            'results': self.results,
        }
