from .misc import compare_lists
from .cases import toy_case, beam_cases
