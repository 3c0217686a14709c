"""Tests for singular_bic."""
