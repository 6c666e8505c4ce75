"""Tests for isacsim."""
