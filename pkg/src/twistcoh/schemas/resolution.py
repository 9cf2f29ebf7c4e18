from twistcoh.schemas.common import Report, StrictSchema


class GrowthReport(StrictSchema):
    window: tuple[int, int]
    values: list[int]
    verdict: str
    gamma: int | None


class ResolveReport(Report):
    module: str
    algebra: str
    steps: int
    ranks: list[int]
    lengths: list[int]
    differentials: list[list[list[str]]]
    projective_dimension: int | None
    growth: GrowthReport | None = None
