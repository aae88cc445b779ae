"""Pydantic models for inputs and reports"""
