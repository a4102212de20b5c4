"""Published capture figures, transcribed by hand.  Independent of the shipped CSV fixtures."""

# session, hosts, total, arp, avg size, %arp
CAPTURES = [
    (1, 48, 28366, 1326, 51.67, "4.67"),
    (2, 45, 15539, 656, 59.15, "4.22"),
    (3, 45, 10331, 557, 59.02, "5.39"),
    (4, 46, 15298, 650, 59.15, "4.25"),
    (5, 48, 12511, 668, 59.24, "5.34"),
    (6, 45, 17614, 677, 59.19, "3.84"),
    (7, 50, 11103, 646, 59.16, "5.82"),
    (8, 48, 16909, 675, 59.22, "3.99"),
    (9, 45, 11666, 583, 59.09, "5.00"),
    (10, 42, 11479, 562, 58.93, "4.90"),
]

# session, total, arp, s-uarp pkts, %arp, %s-uarp, %sarp
NO_ACK = [
    (1, 28366, 1326, 228, "4.67", "0.80", "7.09"),
    (2, 15539, 656, 60, "4.22", "0.39", "5.38"),
    (3, 10331, 557, 62, "5.39", "0.60", "7.19"),
    (4, 15298, 650, 64, "4.25", "0.42", "5.50"),
    (5, 12511, 668, 58, "5.34", "0.46", "6.73"),
    (6, 17614, 677, 62, "3.84", "0.35", "4.90"),
    (7, 11103, 646, 62, "5.82", "0.56", "7.49"),
    (8, 16909, 675, 60, "3.99", "0.35", "5.06"),
    (9, 11666, 583, 60, "5.00", "0.51", "6.54"),
    (10, 11479, 562, 72, "4.90", "0.63", "6.78"),
]

WITH_ACK = [
    (1, 28366, 1326, 342, "4.67", "1.21", "7.09"),
    (2, 15539, 656, 90, "4.22", "0.58", "5.38"),
    (3, 10331, 557, 93, "5.39", "0.90", "7.19"),
    (4, 15298, 650, 96, "4.25", "0.63", "5.50"),
    (5, 12511, 668, 87, "5.34", "0.70", "6.73"),
    (6, 17614, 677, 93, "3.84", "0.53", "4.90"),
    (7, 11103, 646, 93, "5.82", "0.84", "7.49"),
    (8, 16909, 675, 90, "3.99", "0.53", "5.06"),
    (9, 11666, 583, 90, "5.00", "0.77", "6.54"),
    (10, 11479, 562, 108, "4.90", "0.94", "6.78"),
]

SARP_PCT = ["7.09", "5.38", "7.19", "5.50", "6.73", "4.90", "7.49", "5.06", "6.54", "6.78"]

FACTOR_NO_ACK = 9.77
FACTOR_WITH_ACK = 6.50
FACTOR_BLEND = 8.13
FACTOR_TOL = 0.05
