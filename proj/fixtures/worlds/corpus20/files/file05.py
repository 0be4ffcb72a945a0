import os
import sys
import mod05

print(mod05)
