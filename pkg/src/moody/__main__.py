import sys

from moody.cli import main

sys.exit(main())
