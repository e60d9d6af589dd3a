from . import log
from . import maths
