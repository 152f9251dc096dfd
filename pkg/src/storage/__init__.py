"""Result file package"""
from .result_writer import write_results

__all__ = ["write_results"]
