import os
import sys
import mod10
import mod11

print(mod10)
