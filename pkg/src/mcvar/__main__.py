"""Allow running as ``python -m mcvar``."""

import sys

from .cli import main

sys.exit(main())
