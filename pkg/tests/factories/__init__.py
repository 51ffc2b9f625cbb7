"""Test data factories for creating test objects."""

from .flow_factory import FlowKeyFactory, FlowRecordFactory, records_of_flow

__all__ = [
    'FlowKeyFactory',
    'FlowRecordFactory',
    'records_of_flow',
]
