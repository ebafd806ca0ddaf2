"""Burn-scar segmentation package"""
