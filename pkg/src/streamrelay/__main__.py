import sys

from streamrelay.cli import main

sys.exit(main())
