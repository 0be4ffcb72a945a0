import os
import sys
import mod03

print(mod03)
