"""``python -m cubic_lab`` entry point."""

import sys

from .cli import main

sys.exit(main())
