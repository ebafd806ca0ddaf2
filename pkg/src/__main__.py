"""
Burn-scar CLI - Main Entry Point

python -m src <command> 로 실행할 때 사용됩니다. (서버는 python -m src serve)
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
