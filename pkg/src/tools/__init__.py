"""Tools Package"""

from src.tools.evaluate import evaluate
from src.tools.infer import infer
from src.tools.params import params
from src.tools.split import split
from src.tools.synthgen import synthgen
from src.tools.train import train

__all__ = [
    "synthgen",
    "split",
    "train",
    "evaluate",
    "infer",
    "params",
]
