"""Tests for rtlab."""
