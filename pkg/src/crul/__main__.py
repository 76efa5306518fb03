"""Allow ``python -m crul`` as an alias for the ``crul`` console script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
