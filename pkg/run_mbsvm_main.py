import sys
import os

# This ensures the 'mbsvm' package can be found
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from mbsvm.main import main

if __name__ == '__main__':
    sys.exit(main())
