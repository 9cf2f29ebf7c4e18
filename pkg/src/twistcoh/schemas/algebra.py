from twistcoh.schemas.common import Matrix, Report


class NakayamaReport(Report):
    algebra: str
    form: list[str]
    matrix: Matrix
    center_dim: int


class BuiltinReport(Report):
    q: str
    field: str
    files: dict[str, str]
