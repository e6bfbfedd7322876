"""Base model classes and utilities."""

from typing import Any, Dict, Type, TypeVar

from pydantic import BaseModel, ConfigDict

T = TypeVar('T', bound='IASModel')


class IASModel(BaseModel):
    """Base model for all lab domain types.

    Domain values are immutable: they are shared between concurrent
    experiment trials and cached solution data must never drift from
    the labels it was computed from.
    """

    model_config = ConfigDict(
        # Unknown keys are a configuration or data error, never ignored
        extra='forbid',
        frozen=True,
        use_enum_values=False,
        arbitrary_types_allowed=False,
    )

    @classmethod
    def from_dict(cls: Type[T], data: Dict[str, Any]) -> T:
        """Create model instance from dictionary data.

        Args:
            data: Dictionary containing model data

        Returns:
            Model instance
        """
        return cls.model_validate(data)

    def to_dict(self, *, exclude_none: bool = False) -> Dict[str, Any]:
        """Convert model to a JSON-compatible dictionary.

        Args:
            exclude_none: Exclude None values from output

        Returns:
            Dictionary representation of the model
        """
        return self.model_dump(mode="json", exclude_none=exclude_none)
