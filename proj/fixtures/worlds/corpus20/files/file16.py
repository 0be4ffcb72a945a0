import os
import sys
import mod16

print(mod16)
