"""
dpmixsgd test suite
"""
