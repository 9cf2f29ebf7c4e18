from twistcoh.schemas.common import Matrix, Report, StrictSchema
from twistcoh.schemas.resolution import GrowthReport


class WitnessReport(StrictSchema):
    kind: str
    degree: int
    coords: list[str]


class FgReport(Report):
    module: str
    twist: str
    t: int
    window: int
    generator_degrees: list[int]
    dims: list[int]
    uncovered: list[int]
    generated_up_to: int
    action_injective_from: int | None
    verdict: str
    witness: WitnessReport | None = None


class VarietyDimReport(Report):
    module: str
    twist: str
    t: int
    dim: int | None
    trivial: bool
    growth: GrowthReport
    fg_verdict: str | None = None
    caveats: list[str] = []  # noqa: RUF012


class PeriodicityReport(Report):
    module: str
    twist: str
    t: int
    found: bool
    shift: int | None = None
    period: int | None = None
    intertwiner: Matrix | None = None
    note: str = ""
    inconclusive: list[tuple[int, int]] = []  # noqa: RUF012


class ReduceReport(Report):
    module: str
    degree: int
    k_eta_dim: int
    sequence_exact: bool
    tensor_sequence_exact: bool
    result_dim: int
    growth: GrowthReport
