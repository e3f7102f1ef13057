import sys

from ts2c.harness.cli import main

sys.exit(main())
