import os
import sys
import mod08

print(mod08)
