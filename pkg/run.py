#!/usr/bin/env python3
"""
Run coopadmm from a source checkout without installing it.
"""

import os
import sys

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from coopadmm.main import main

if __name__ == "__main__":
    sys.exit(main())
