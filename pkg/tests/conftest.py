import pathlib
import sys

# make the shared oracle helpers importable from every test module
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))
