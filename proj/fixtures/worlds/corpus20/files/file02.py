import os
import sys
import mod02

print(mod02)
