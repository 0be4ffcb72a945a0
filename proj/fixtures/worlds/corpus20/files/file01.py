import os
import sys
import mod01

print(mod01)
