"""Requirement-to-schema toolkit: FD normalization, ER lowering, agent pipeline, evaluation and DDL."""

from .schema import Schema, SchemaBuilder, deserialize_schema, serialize_schema, validate_schema

__version__ = "0.1.0"

__all__ = ["Schema", "SchemaBuilder", "deserialize_schema", "serialize_schema", "validate_schema"]
