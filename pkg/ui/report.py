"""Console Report Module.

This module renders the results of a run as plain text tables on the
console.
"""

import sys
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

from core.bifurcation import DensityField, ScalarField
from core.cycles import ContinuationResult
from core.lyapunov import Agreement, LyapEstimate
from core.verification import CheckResult


class ConsoleReport:
    """A simple text-based report for the command-line front end."""

    def __init__(self, stream: Optional[TextIO] = None):
        """Initialize the report.

        Args:
            stream: Where to print; standard output when None.
        """
        self.stream = stream or sys.stdout

    def _print(self, text: str = "") -> None:
        print(text, file=self.stream)

    def table(self, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
        """Print left-aligned columns separated by two spaces."""
        rows = [list(map(str, row)) for row in rows]
        widths = [max(len(str(h)), *(len(r[k]) for r in rows)) if rows else len(str(h))
                  for k, h in enumerate(header)]
        self._print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip())
        self._print("  ".join("-" * w for w in widths))
        for row in rows:
            self._print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())

    def display_estimates(self, title: str, estimates: List[LyapEstimate], agreements: List[Agreement],
                          lower_bound: float) -> None:
        """Display Lyapunov estimates and their pairwise agreement."""
        self._print(f"\n{title}")
        self.table(["method", "value", "error", "flagged"],
                   [(e.method.value, f"{e.value:.12f}", f"{e.error:.3e}", "yes" if e.flagged else "")
                    for e in estimates])
        self._print(f"lower bound: {lower_bound:.12f}")
        if agreements:
            self._print("\nAgreement:")
            self.table(["pair", "difference", "tolerance", "status"],
                       [(f"{a.first.value}/{a.second.value}", f"{a.difference:.3e}", f"{a.tolerance:.3e}",
                         "ok" if a.ok else "MISMATCH") for a in agreements])

    def display_field(self, field: ScalarField, paths: Sequence[str]) -> None:
        values = field.values
        finite = values[~field.flags] if field.flagged_count < values.size else values[:0]
        self._print(f"\nField {field.label} on grid {field.grid} ({values.size} cells)")
        if finite.size:
            self._print(f"min: {finite.min():.12g}  max: {finite.max():.12g}")
        self._print(f"flagged cells: {field.flagged_count}")
        self._print(f"wrote: {', '.join(paths)}")

    def display_density(self, density: DensityField, extra: Dict[str, float], paths: Sequence[str]) -> None:
        """Display the mass report of a density."""
        self._print(f"\nDensity on grid {density.grid}")
        rows = [("total mass", f"{density.total_mass:.8f}"),
                ("raw mass", f"{density.raw_mass:.8f}"),
                ("negative mass fraction", f"{density.negative_mass_fraction:.6f}"),
                ("invalid cells", str(int(density.invalid.sum()))),
                ("invalid mass", f"{density.invalid_mass:.3e}")]
        rows.extend((key, f"{value:.8g}") for key, value in extra.items())
        self.table(["quantity", "value"], rows)
        self._print(f"wrote: {', '.join(paths)}")

    def display_centers(self, n: int, w: complex, result: ContinuationResult, paths: Sequence[str]) -> None:
        self._print(f"\nPer_{n}({w}): {len(result.parameters)} parameter(s), "
                    f"{len(result.failures)} failed continuation(s)")
        if len(result.residuals):
            self._print(f"max multiplier residual: {max(result.residuals):.3e}")
        self._print(f"wrote: {', '.join(paths)}")

    def display_checks(self, results: List[CheckResult]) -> None:
        """Display verification results and the overall verdict."""
        self._print("")
        self.table(["check", "status", "flagged", "detail"],
                   [(r.name, "pass" if r.passed else "FAIL", str(r.flagged) if r.flagged else "", r.detail)
                    for r in results])
        failed = [r.name for r in results if not r.passed]
        if failed:
            self._print(f"\n{len(failed)} of {len(results)} check(s) failed: {', '.join(failed)}")
        else:
            self._print(f"\nAll {len(results)} checks passed")

    def display_error(self, message: str) -> None:
        print(f"error: {message}", file=sys.stderr)
