"""Team growth under the tension between predictive accuracy and affinity bias."""
