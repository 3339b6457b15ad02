import json
import pydantic

from pathlib import Path
from typing import Annotated, List, Optional, Type, TypeVar, Union
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat

from app.core.errors import InvalidInput
from app.core.algebra import AlgebraElement, GroupElement, require_group

Model = TypeVar("Model", bound=BaseModel)

Duration = Annotated[float, Field(ge=0.0, allow_inf_nan=False)]


class WireModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AlgebraElementModel(WireModel):
    kx: FiniteFloat = 0.0
    ky: FiniteFloat = 0.0
    kz: FiniteFloat = 0.0

    def to_element(self) -> AlgebraElement:
        return AlgebraElement(self.kx, self.ky, self.kz)


class GroupElementModel(WireModel):
    x1: FiniteFloat
    x2: FiniteFloat
    x3: FiniteFloat
    x4: FiniteFloat

    def to_element(self) -> GroupElement:
        return require_group(GroupElement(self.x1, self.x2, self.x3, self.x4))


class SegmentModel(WireModel):
    duration: Duration
    controls: List[FiniteFloat]


class ScheduleModel(WireModel):
    segments: List[SegmentModel] = Field(default_factory=list)


class WorkedExample(WireModel):
    """One entry of the worked-example case file."""
    name: str
    command: str
    drift: AlgebraElementModel
    controls: List[AlgebraElementModel]
    bound: Optional[float] = None
    expected: str
    note: str = ""


def load_json_argument(text: str):
    """Inline JSON, or '@path' to read the JSON from a file."""
    if text.startswith("@"):
        path = Path(text[1:])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise InvalidInput(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInput(f"malformed JSON: {e.msg} at position {e.pos}") from e


def validate_model(model_cls: Type[Model], payload) -> Model:
    try:
        return model_cls.model_validate(payload)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or model_cls.__name__
        raise InvalidInput(f"{model_cls.__name__}: {where}: {first['msg']}") from e


def parse_model(model_cls: Type[Model], text: str) -> Model:
    return validate_model(model_cls, load_json_argument(text))


def parse_element(text: str) -> Union[AlgebraElement, GroupElement]:
    """Group element when the payload carries x1..x4 keys, algebra element otherwise."""
    payload = load_json_argument(text)
    if isinstance(payload, dict) and "x1" in payload:
        return validate_model(GroupElementModel, payload).to_element()
    return validate_model(AlgebraElementModel, payload).to_element()


def parse_algebra(text: str) -> AlgebraElement:
    return parse_model(AlgebraElementModel, text).to_element()


def parse_group(text: str) -> GroupElement:
    return parse_model(GroupElementModel, text).to_element()


def parse_complex(text: str) -> complex:
    """Accepts '0.3', '0.3+0.1i' or '0.3+0.1j'."""
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError as e:
        raise InvalidInput(f"not a complex number: {text!r}") from e
