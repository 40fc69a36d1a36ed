import sys

from ringsplit.cli import main

sys.exit(main())
