import os
import sys
import mod06

print(mod06)
