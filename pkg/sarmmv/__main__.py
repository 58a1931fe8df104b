"""Allow ``python -m sarmmv``."""

import sys

from sarmmv.main import main

sys.exit(main())
