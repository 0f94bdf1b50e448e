"""Record of one training run: histories, final estimates, parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .nets import MlpParams

__all__ = ["RunReport"]


@dataclass
class RunReport:
    seed: int
    losses: np.ndarray                  # per-iteration training loss
    lrs: np.ndarray                     # learning rate applied at each iteration
    y0_curve: np.ndarray                # per-iteration y(0) first component
    y0: np.ndarray                      # final eval-batch estimate, shape (n,)
    y0_path: np.ndarray                 # (N+1, n) path table from the eval batch
    eval_loss: float                    # cost functional on the eval batch
    wall_clock_s: float
    params: dict = field(default_factory=dict)   # role -> MlpParams
    losses2: Optional[np.ndarray] = None         # constrained solver only
    eval_loss2: Optional[float] = None
    y0_readout: Optional[np.ndarray] = None      # y-network value at (0, x0)

    @property
    def y0_first(self) -> float:
        return float(self.y0[0])
