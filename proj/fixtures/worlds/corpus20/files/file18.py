import os
import sys
import mod18

print(mod18)
