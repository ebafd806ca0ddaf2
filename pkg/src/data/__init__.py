"""Data Package"""
