from .core import *  # noqa
from .numerical import *  # noqa
