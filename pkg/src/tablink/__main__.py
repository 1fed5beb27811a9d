"""Allow ``python -m tablink``."""
import sys

from .cli import main

sys.exit(main())
