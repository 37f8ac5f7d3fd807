"""
Adaptive social learning simulator and graph social learning (GSL) inverse learner
"""
