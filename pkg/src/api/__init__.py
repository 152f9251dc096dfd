"""Command-line package"""
