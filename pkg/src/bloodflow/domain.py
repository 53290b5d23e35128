"""Blood domain reference data: ABO/Rh groups, components, compatibility rules.

Everything in this module is immutable after import and safe for concurrent
reads. Text forms are canonical: blood types render as "O+", "AB-", etc. and
components as "RBC", "PLAS", "PLAT", "WB".
"""

from __future__ import annotations

import enum
from typing import Mapping


class BloodType(enum.Enum):
    """The eight ABO/Rh blood groups."""

    O_POS = "O+"
    O_NEG = "O-"
    A_POS = "A+"
    A_NEG = "A-"
    B_POS = "B+"
    B_NEG = "B-"
    AB_POS = "AB+"
    AB_NEG = "AB-"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "BloodType":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown blood type {text!r}") from None

    @property
    def abo_antigens(self) -> frozenset[str]:
        """A/B antigens carried on the red cells of this group."""
        letters = self.value.rstrip("+-")
        return frozenset() if letters == "O" else frozenset(letters)

    @property
    def rh_positive(self) -> bool:
        return self.value.endswith("+")


class Component(enum.Enum):
    """The four blood products tracked in inventory."""

    RBC = "RBC"
    PLAS = "PLAS"
    PLAT = "PLAT"
    WB = "WB"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Component":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown component {text!r}") from None


# Shelf life in days after donation; a unit is usable on its expiration date
# and removed the day after.
SHELF_LIFE_DAYS: Mapping[Component, int] = {
    Component.RBC: 42,
    Component.PLAS: 365,
    Component.PLAT: 5,
    Component.WB: 35,
}

# Rarity scores: lower means rarer in the population. Allocation uses these to
# spend common types before rare ones.
RARITY_SCORE: Mapping[BloodType, int] = {
    BloodType.O_POS: 4,
    BloodType.A_POS: 3,
    BloodType.O_NEG: 3,
    BloodType.B_POS: 2,
    BloodType.A_NEG: 2,
    BloodType.B_NEG: 1,
    BloodType.AB_POS: 1,
    BloodType.AB_NEG: 1,
}

# Population prevalence of each group, in the canonical descending order used
# for inverse-CDF sampling and serialization.
TYPE_DISTRIBUTION: Mapping[BloodType, float] = {
    BloodType.O_POS: 0.38,
    BloodType.A_POS: 0.34,
    BloodType.B_POS: 0.09,
    BloodType.O_NEG: 0.07,
    BloodType.A_NEG: 0.06,
    BloodType.AB_POS: 0.03,
    BloodType.B_NEG: 0.02,
    BloodType.AB_NEG: 0.01,
}

CANONICAL_TYPE_ORDER: tuple[BloodType, ...] = tuple(TYPE_DISTRIBUTION)


def _build_compatibility() -> Mapping[BloodType, frozenset[BloodType]]:
    # A recipient tolerates a donor when the donor carries no ABO antigen the
    # recipient lacks, and is Rh- unless the recipient is Rh+.
    table = {}
    for recipient in BloodType:
        donors = frozenset(
            donor
            for donor in BloodType
            if donor.abo_antigens <= recipient.abo_antigens
            and (not donor.rh_positive or recipient.rh_positive)
        )
        table[recipient] = donors
    return table


# recipient -> set of donor types that can safely be transfused. One matrix is
# applied uniformly to all four components.
COMPATIBLE_DONORS: Mapping[BloodType, frozenset[BloodType]] = _build_compatibility()


def compatible_donors(recipient: BloodType) -> frozenset[BloodType]:
    """Donor types a recipient of the given group can receive."""
    return COMPATIBLE_DONORS[recipient]


def rarity_score(blood_type: BloodType) -> int:
    return RARITY_SCORE[blood_type]


def shelf_life_days(component: Component) -> int:
    return SHELF_LIFE_DAYS[component]


def sample_blood_type(rng) -> BloodType:
    """Draw a blood type from the population distribution.

    Inverse-CDF over the canonical type order, so a given uniform draw always
    maps to the same group. `rng` must provide `random()`.
    """
    u = rng.random()
    acc = 0.0
    for blood_type in CANONICAL_TYPE_ORDER:
        acc += TYPE_DISTRIBUTION[blood_type]
        if u < acc:
            return blood_type
    return CANONICAL_TYPE_ORDER[-1]
