# run.py
"""
Main entry point.

    python run.py <command> [--config FILE] [--out DIR] [--seed N] [flags]

Commands: gm-herd, empirical-herd, compare, posterior. The same commands are
available as `flask --app kherd <command>`.
"""

from pathlib import Path
from dotenv import load_dotenv

# Load environment variables FIRST thing
basedir = Path(__file__).parent.absolute()
load_dotenv(basedir / '.env')

from kherd import create_app


def main(argv=None):
    app = create_app()
    with app.app_context():
        app.cli.main(args=argv, prog_name='kherd')


if __name__ == '__main__':
    main()
