import sys

from holderkit.cli import main

sys.exit(main())
