import sys

from homfields.cli import main

sys.exit(main())
