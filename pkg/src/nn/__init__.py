"""NN Package"""
