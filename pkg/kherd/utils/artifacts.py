import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from kherd.constants import ArtifactName, NumericTolerance

logger = logging.getLogger(__name__)


def format_float(value) -> str:
    """17 significant digits: round-trips every double exactly."""
    return format(float(value), NumericTolerance.FLOAT_FORMAT)


def _to_builtin(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows; floats are formatted with format_float, everything else with str."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(output.getvalue(), encoding='utf-8')
    return path


def write_json(path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin) + '\n', encoding='utf-8')
    return path


def write_matrix(path, X: np.ndarray, prefix: str = 'x', index: Optional[np.ndarray] = None) -> Path:
    """One point per row, columns x0..x{d-1}; optional leading index column."""
    X = np.asarray(X, dtype=float)
    dim = X.shape[1] if X.ndim == 2 else 0
    header = [f'{prefix}{j}' for j in range(dim)]
    if index is None:
        rows = ([float(v) for v in row] for row in X)
    else:
        header = ['index'] + header
        rows = ([int(i)] + [float(v) for v in row] for i, row in zip(index, X))
    return write_csv(path, header, rows)


def save_super_samples(result, directory) -> List[Path]:
    """
    Persist a SuperSampleSet: samples.csv (with an index column in discrete
    mode), error_trace.csv and the samples.json sidecar.

    Returns:
        List of written paths
    """
    directory = Path(directory)
    samples = write_matrix(directory / ArtifactName.SAMPLES, result.samples, index=result.indices)
    trace = write_csv(directory / ArtifactName.ERROR_TRACE, ['T', 'error'],
                      ([t + 1, float(e)] for t, e in enumerate(result.errors)))
    manifest = write_json(directory / ArtifactName.SAMPLES_MANIFEST, result.to_manifest())
    logger.debug(f"Saved {result.T} super-samples to {directory}")
    return [samples, trace, manifest]


def write_traces(path, traces) -> Path:
    """Columns: T, error, estimator, function, seed, std (empty when not averaged)."""
    def rows():
        for trace in traces:
            for i, (t, e) in enumerate(zip(trace.t_values, trace.errors)):
                std = '' if trace.std is None else format_float(trace.std[i])
                yield [int(t), float(e), trace.estimator, trace.function, int(trace.seed), std]
    return write_csv(path, ['T', 'error', 'estimator', 'function', 'seed', 'std'], rows())


def write_rates(path, rates: Sequence[dict]) -> Path:
    """JSON list of {estimator, function, slope, r2}."""
    return write_json(path, [
        {'estimator': r['estimator'], 'function': r['function'], 'slope': r['slope'], 'r2': r['r2']}
        for r in rates
    ])


def save_chain(chain, directory) -> List[Path]:
    """θ rows as chain.csv (columns theta0..) plus chain.json with the sampler settings."""
    directory = Path(directory)
    thetas = write_matrix(directory / ArtifactName.CHAIN, chain.thetas, prefix='theta')
    manifest = write_json(directory / ArtifactName.CHAIN_MANIFEST, chain.to_manifest())
    return [thetas, manifest]
