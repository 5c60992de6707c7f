"""Print the limiting edge laws on a coarse grid."""
from __future__ import annotations

import numpy as np

from spiked_spectra import distributions as dist

LAWS = {
    "F_GUE": dist.f_gue,
    "F_GOE": dist.f_goe,
    "F_GSE": dist.f_gse,
    "F_GUE1": lambda s: dist.f_gue_t(s, 1),
    "F_GSE1": dist.f_gse1,
    "G_2": lambda s: dist.g_t(s, 2),
}


def main() -> None:
    print("s," + ",".join(LAWS))
    for s in np.arange(-4.0, 2.01, 0.5):
        print(f"{s:.1f}," + ",".join(f"{f(s):.8f}" for f in LAWS.values()))


if __name__ == "__main__":
    main()
