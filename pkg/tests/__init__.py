# Tests for the ringsplit package
