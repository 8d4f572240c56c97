"""Localization-driven active-space selection and convergence sweeps.

The localization factor of an MO over a site region V is the summed squared
coefficient weight on those sites; orbitals at or above the threshold enter
the active space.  Character tags (defect / valence / conduction) feed the
ghost-state classifier.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .greens import OrbitalSet

DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class OrbitalEntry:
    index: int
    l_value: float
    energy_rel_homo: float  # Hartree
    selected: bool
    character: str  # "defect" | "valence" | "conduction"


@dataclass(frozen=True)
class LocalizationReport:
    region: tuple  # site indices
    threshold: float
    entries: tuple  # OrbitalEntry per MO

    def characters(self, orbitals=None):
        """Character tags in MO-index order, optionally restricted to a set."""
        if orbitals is None:
            return tuple(e.character for e in self.entries)
        lookup = {e.index: e.character for e in self.entries}
        return tuple(lookup[i] for i in orbitals)

    def selected_indices(self):
        return tuple(e.index for e in self.entries if e.selected)


def localization_factor(sol, region):
    """Per-MO weight on the region sites: L_V[m] = sum_{i in V} C[i, m]^2."""
    region = tuple(sorted(set(int(i) for i in region)))
    if len(region) == 0:
        raise ValidationError("empty localization region")
    if region[0] < 0 or region[-1] >= sol.n_orb:
        raise ValidationError(f"region site out of range for {sol.n_orb} sites")
    return np.einsum("im,im->m", sol.coeffs[list(region), :], sol.coeffs[list(region), :])


def localization_report(sol, region, threshold=DEFAULT_THRESHOLD):
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    lv = localization_factor(sol, region)
    e_homo = sol.energies[sol.homo]
    midpoint = 0.5 * (sol.energies[sol.homo] + sol.energies[sol.lumo])
    entries = []
    for m in range(sol.n_orb):
        selected = bool(lv[m] >= threshold)
        if selected:
            char = "defect"
        elif sol.energies[m] < midpoint:
            char = "valence"
        else:
            char = "conduction"
        entries.append(
            OrbitalEntry(
                index=m,
                l_value=float(lv[m]),
                energy_rel_homo=float(sol.energies[m] - e_homo),
                selected=selected,
                character=char,
            )
        )
    return LocalizationReport(region=region, threshold=threshold, entries=tuple(entries))


def select_active(report, threshold=None):
    """Active orbital set {m : L_V[m] >= threshold}.

    Lower thresholds give supersets; an empty selection is an error.
    """
    if threshold is None:
        threshold = report.threshold
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    n_orb = len(report.entries)
    idx = tuple(e.index for e in report.entries if e.l_value >= threshold)
    if len(idx) == 0:
        raise ValidationError(
            f"no orbital reaches L_V >= {threshold}; lower the threshold"
        )
    return OrbitalSet(idx, n_orb)


def sweep(config):
    """Convergence table over one sweep axis (threshold, rank or model size).

    Returns a list of row dicts; CSV serialization lives with the pipeline.
    """
    from . import pipeline

    return pipeline.run_sweep(config)
