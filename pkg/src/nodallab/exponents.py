"""Exact exponent bookkeeping for the three nodal lower-bound methods."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .exceptions import NodalLabError
from .norms import sogge_delta, sogge_kink


@dataclass(frozen=True)
class ExponentTable:
    n: int
    yau_target: Fraction
    df_growth: Fraction
    local_density: Fraction
    growth_volume: Fraction
    cm: Fraction
    sz: Fraction
    cm_ball_count: Fraction
    sz_l1: Fraction
    grad: Fraction
    sogge_kink: Fraction

    def chain_identities(self) -> dict[str, bool]:
        """Each method's exponent recomputed from its ingredients."""
        n = self.n
        half = Fraction(1, 2)
        # growth-volume bound beta^-(n-1) with beta ~ lam^(1/2), raised to (n-1)/n
        density_from_growth = -(n - 1) * self.df_growth * Fraction(n - 1, n)
        return {
            "local_density": self.local_density == density_from_growth,
            "growth_volume": self.growth_volume == self.local_density + Fraction(1 - n, 2) + Fraction(n, 2),
            "cm": self.cm == self.cm_ball_count + Fraction(1 - n, 2),
            "sz": self.sz == 1 + self.sz_l1 - self.grad,
            "cm_ball_count": self.cm_ball_count == Fraction(n, 2) - self.vol_g_drop(),
            "vol_g": self.vol_g_drop() == Fraction(n - 1, 4),
            "sz_l1": self.sz_l1 == -self._l1_from_holder(),
            "yau": self.yau_target == half,
        }

    def vol_g_drop(self) -> Fraction:
        """``e`` in ``Vol(G) >= lam^-e``: Hoelder on G with the L^p bound at the kink."""
        p = self.sogge_kink
        return 2 * sogge_delta(self.n, p) / (1 - Fraction(2) / p)

    def _l1_from_holder(self) -> Fraction:
        p = self.sogge_kink
        return p * sogge_delta(self.n, p) / (p - 2)

    def as_strings(self) -> dict[str, str]:
        return {k: str(v) for k, v in asdict(self).items()}


def exponent_table(n: int) -> ExponentTable:
    if not 2 <= n <= 8:
        raise NodalLabError(f"n out of range: {n} (expected 2..8)")
    F = Fraction
    return ExponentTable(
        n=n,
        yau_target=F(1, 2),
        df_growth=F(1, 2),
        local_density=-F((n - 1) ** 2, 2 * n),
        growth_volume=F(3 - n, 2) - F(1, 2 * n),
        cm=F(3 - n, 4),
        sz=F(7 - 3 * n, 8),
        cm_ball_count=F(n + 1, 4),
        sz_l1=-F(n - 1, 8),
        grad=F(n + 1, 4),
        sogge_kink=sogge_kink(n),
    )


def format_table(table: ExponentTable) -> str:
    rows = table.as_strings()
    width = max(len(k) for k in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows.items())
