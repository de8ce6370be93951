"""Offline trainer for the motion-profile detector networks.

Consumes labeled IMU logs (imu.csv + flags.csv pairs), trains one small
two-layer LSTM scorer per motion profile, and exports the weights in the
binary interchange format the navigation filter's inference engine loads.
This package never imports the navigation code; the file formats are the
whole contract.
"""

PROFILES = ("vel", "ang", "lat", "up")
THRESHOLDS = (0.95, 0.95, 0.5, 0.5)
