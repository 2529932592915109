"""Multifractal analysis of overlapping self-similar measures in integer base."""
