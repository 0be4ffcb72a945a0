import os
import sys
import mod15

print(mod15)
