import sys

from threadcred.cli import main

sys.exit(main())
