"""Version shims."""

import numpy as np

# numpy 2 renamed trapz; support both.
trapezoid = getattr(np, "trapezoid", None) or np.trapz
