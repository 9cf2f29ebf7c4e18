from pydantic import BaseModel, ConfigDict

SCHEMA_VERSION = "1"

Matrix = list[list[str]]


class StrictSchema(BaseModel):
    model_config = ConfigDict(from_attributes=True)


class Report(StrictSchema):
    schema_version: str = SCHEMA_VERSION
    command: str


class ErrorDetail(StrictSchema):
    type: str
    message: str


class ErrorReport(Report):
    error: ErrorDetail
