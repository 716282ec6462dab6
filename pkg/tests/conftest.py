import sys
from pathlib import Path

# Tests import fixture helpers (tests/mat5_fixture.py etc.) as plain modules.
sys.path.insert(0, str(Path(__file__).parent))
