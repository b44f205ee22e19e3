"""Entry point: python run.py <bound|empirical|commutator> [options]"""

import sys

from hubbard_trotter.cli import main

if __name__ == "__main__":
    sys.exit(main())
