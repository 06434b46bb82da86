"""Allow `python -m ring_mpc`."""

import sys

from .cli import main

sys.exit(main())
